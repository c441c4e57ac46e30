//! The distance-d parity code on the modified LHZ triangle.
//!
//! Qubits are `q_{u,v}` with `1 <= u <= v <= d`; `q_{k,k}` is base qubit k.
//! Stabilizers are `S_{i,j}` with `i < j`, supported on
//! `{q_{i,j}, q_{i+1,j}, q_{i,j-1}, q_{i+1,j-1}}` after sorting indices and
//! merging duplicates. Qubit line m (0..=d) is column m plus row m+1 of the
//! triangle, so base qubit k lies on lines k-1 and k. Everything internal
//! works on dense indices; the id types are for I/O and tests.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Serialize;

use crate::clusters::Geometry;
use crate::error::{internal, invalid, Error, Result};
use crate::gf2::{BitVec, SpanSolver};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitId {
    pub u: usize,
    pub v: usize,
}

impl QubitId {
    /// Canonicalizes the index order.
    pub fn new(a: usize, b: usize) -> Self {
        QubitId { u: a.min(b), v: a.max(b) }
    }

    pub fn base(k: usize) -> Self {
        QubitId { u: k, v: k }
    }

    pub fn is_base(self) -> bool {
        self.u == self.v
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_base() {
            write!(f, "base{}", self.u)
        } else {
            write!(f, "q{}.{}", self.u, self.v)
        }
    }
}

fn parse_pair(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once('.')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

impl FromStr for QubitId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid(format!("bad qubit id {s:?} (expected qU.V or baseK)"));
        if let Some(k) = s.strip_prefix("base") {
            let k: usize = k.parse().map_err(|_| bad())?;
            return Ok(QubitId::base(k));
        }
        let (u, v) = s.strip_prefix('q').and_then(parse_pair).ok_or_else(bad)?;
        Ok(QubitId::new(u, v))
    }
}

impl Serialize for QubitId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StabilizerId {
    pub i: usize,
    pub j: usize,
}

impl StabilizerId {
    pub fn new(a: usize, b: usize) -> Self {
        StabilizerId { i: a.min(b), j: a.max(b) }
    }
}

impl fmt::Display for StabilizerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}.{}", self.i, self.j)
    }
}

impl FromStr for StabilizerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (i, j) = s
            .strip_prefix('s')
            .and_then(parse_pair)
            .ok_or_else(|| invalid(format!("bad stabilizer id {s:?} (expected sI.J)")))?;
        if i == j {
            return Err(invalid(format!("bad stabilizer id {s:?}")));
        }
        Ok(StabilizerId::new(i, j))
    }
}

impl Serialize for StabilizerId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug)]
pub struct Code {
    d: usize,
    qubits: Vec<QubitId>,
    stabilizers: Vec<StabilizerId>,
    supports: Vec<Vec<usize>>,
    incidence: Vec<Vec<usize>>,
    lines: Vec<Vec<usize>>,
    line_solver: SpanSolver,
    geometry: OnceLock<Geometry>,
}

impl Code {
    pub fn new(d: usize) -> Result<Code> {
        if d < 2 {
            return Err(invalid(format!("distance must be >= 2, got {d}")));
        }
        let mut qubits = Vec::with_capacity(d * (d + 1) / 2);
        for u in 1..=d {
            for v in u..=d {
                qubits.push(QubitId { u, v });
            }
        }
        let mut stabilizers = Vec::with_capacity(d * (d - 1) / 2);
        for i in 1..=d {
            for j in i + 1..=d {
                stabilizers.push(StabilizerId { i, j });
            }
        }
        let qindex = |u: usize, v: usize| (u - 1) * (2 * d + 2 - u) / 2 + (v - u);

        let mut supports = Vec::with_capacity(stabilizers.len());
        let mut incidence = vec![Vec::new(); qubits.len()];
        for (s, st) in stabilizers.iter().enumerate() {
            let (i, j) = (st.i, st.j);
            let mut sup: Vec<usize> = [(i, j), (i + 1, j), (i, j - 1), (i + 1, j - 1)]
                .into_iter()
                .map(|(a, b)| QubitId::new(a, b))
                .map(|q| qindex(q.u, q.v))
                .collect();
            sup.sort_unstable();
            sup.dedup();
            for &q in &sup {
                incidence[q].push(s);
            }
            supports.push(sup);
        }

        // Line m is column m together with row m+1 of the triangle; these
        // are exactly the weight-d sets with an empty syndrome.
        let lines: Vec<Vec<usize>> = (0..=d)
            .map(|m| (0..qubits.len()).filter(|&q| qubits[q].v == m || qubits[q].u == m + 1).collect())
            .collect();
        let n = qubits.len();
        let gens: Vec<BitVec> = lines[1..]
            .iter()
            .map(|l| BitVec::from_indices(n, l.iter().copied()))
            .collect();
        let line_solver = SpanSolver::new(&gens);

        Ok(Code { d, qubits, stabilizers, supports, incidence, lines, line_solver, geometry: OnceLock::new() })
    }

    /// Segment tables for contours, built on first use.
    pub(crate) fn geometry(&self) -> &Geometry {
        self.geometry.get_or_init(|| Geometry::new(self))
    }

    pub fn distance(&self) -> usize {
        self.d
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn num_stabilizers(&self) -> usize {
        self.stabilizers.len()
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn stabilizers(&self) -> &[StabilizerId] {
        &self.stabilizers
    }

    pub fn qubit_index(&self, q: QubitId) -> Result<usize> {
        let d = self.d;
        if q.u < 1 || q.u > q.v || q.v > d {
            return Err(invalid(format!("qubit {q} does not exist for d={d}")));
        }
        Ok((q.u - 1) * (2 * d + 2 - q.u) / 2 + (q.v - q.u))
    }

    pub fn stabilizer_index(&self, s: StabilizerId) -> Result<usize> {
        let d = self.d;
        if s.i < 1 || s.i >= s.j || s.j > d {
            return Err(invalid(format!("stabilizer {s} does not exist for d={d}")));
        }
        Ok((s.i - 1) * (2 * d - s.i) / 2 + (s.j - s.i - 1))
    }

    pub fn qubit(&self, q: usize) -> QubitId {
        self.qubits[q]
    }

    pub fn stabilizer(&self, s: usize) -> StabilizerId {
        self.stabilizers[s]
    }

    /// Qubit indices in the support of stabilizer `s`, sorted.
    pub fn support(&self, s: usize) -> &[usize] {
        &self.supports[s]
    }

    /// Stabilizer indices whose support contains qubit `q`, sorted.
    pub fn incident(&self, q: usize) -> &[usize] {
        &self.incidence[q]
    }

    pub fn stabilizer_support(&self, s: StabilizerId) -> Result<Vec<QubitId>> {
        let s = self.stabilizer_index(s)?;
        Ok(self.supports[s].iter().map(|&q| self.qubits[q]).collect())
    }

    /// Defects of an X error given as qubit indices (duplicates cancel).
    pub fn syndrome(&self, error: &[usize]) -> Vec<usize> {
        let mut flip = vec![false; self.stabilizers.len()];
        for &q in error {
            for &s in &self.incidence[q] {
                flip[s] ^= true;
            }
        }
        flip.iter().enumerate().filter(|(_, &f)| f).map(|(s, _)| s).collect()
    }

    pub fn syndrome_ids(&self, error: &[QubitId]) -> Result<Vec<StabilizerId>> {
        let idx = error.iter().map(|&q| self.qubit_index(q)).collect::<Result<Vec<_>>>()?;
        Ok(self.syndrome(&idx).into_iter().map(|s| self.stabilizers[s]).collect())
    }

    /// Qubit line `m` (0 = base qubits) as sorted qubit indices.
    pub fn line(&self, m: usize) -> &[usize] {
        &self.lines[m]
    }

    pub fn qubit_line(&self, m: usize) -> Result<Vec<QubitId>> {
        if m > self.d {
            return Err(invalid(format!("line index {m} out of range 0..={}", self.d)));
        }
        Ok(self.lines[m].iter().map(|&q| self.qubits[q]).collect())
    }

    /// The two lines through qubit `q`.
    pub fn lines_through(&self, q: usize) -> [usize; 2] {
        let QubitId { u, v } = self.qubits[q];
        [u - 1, v]
    }

    pub fn k_line(&self, members: &[usize]) -> Result<Vec<usize>> {
        if members.is_empty() {
            return Err(invalid("k_line needs at least one line"));
        }
        let mut acc = Vec::new();
        for &m in members {
            if m > self.d {
                return Err(invalid(format!("line index {m} out of range 0..={}", self.d)));
            }
            acc = sym_diff(&acc, &self.lines[m]);
        }
        Ok(acc)
    }

    /// Writes a zero-syndrome qubit set as a sum of lines 1..d. Bit `m-1` of
    /// the result is the coefficient of line m.
    pub fn decompose_residual(&self, residual: &[usize]) -> Result<Vec<bool>> {
        if !self.syndrome(residual).is_empty() {
            return Err(Error::Precondition("residual has a nonzero syndrome".into()));
        }
        let target = BitVec::from_indices(self.qubits.len(), residual.iter().copied());
        let coef = self
            .line_solver
            .solve(&target)
            .ok_or_else(|| internal("zero-syndrome set outside the span of the qubit lines"))?;
        Ok((0..self.d).map(|m| coef.get(m)).collect())
    }
}

/// Symmetric difference of two sorted, duplicate-free index lists.
pub fn sym_diff(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Sorts and cancels repeated entries in pairs.
pub fn reduce_mod2(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    let mut out = Vec::with_capacity(v.len());
    for x in v {
        if out.last() == Some(&x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}
