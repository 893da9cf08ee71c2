//! Consecutive partitions of integer intervals.
//!
//! A consecutive partition splits [n] (or all of the positive integers) into
//! blocks of consecutive integers, so it is determined by its sequence of
//! block sizes. Partitions of the whole line are handled through restrictions:
//! code holds a finite prefix of sizes, optionally closed by a single infinite
//! block, and every law in this crate is consumed through `restrict`.
//!
//! `coag` is composition: block `j` of `coag(C, D)` is the union of the
//! `C`-blocks indexed by block `j` of `D`. Coagulation of consecutive
//! partitions is again consecutive, which is what makes the flows in this
//! crate finite-dimensional objects.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConsecutivePartition {
    /// Finite block sizes in order, all positive.
    sizes: Vec<u64>,
    /// One trailing infinite block after the finite prefix.
    infinite_last: bool,
}

/// A single coagulation move on a partition with `m` blocks: interior events
/// merge blocks `j, .., j+k-1` (1-based, `j+k-1 <= m`); boundary events merge
/// blocks `j, .., m` into the final block (`j <= m-1`, `k` ignored).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeEvent {
    pub j: usize,
    pub k: usize,
    pub boundary: bool,
}

impl ConsecutivePartition {
    pub fn from_sizes(sizes: Vec<u64>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::domain("partition needs at least one block".to_string()));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::domain("block sizes must be positive".to_string()));
        }
        Ok(ConsecutivePartition { sizes, infinite_last: false })
    }

    /// Finite prefix of sizes followed by one infinite block; an empty prefix
    /// is the one-block partition of the whole line.
    pub fn from_sizes_with_infinite(sizes: Vec<u64>) -> Result<Self> {
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::domain("block sizes must be positive".to_string()));
        }
        Ok(ConsecutivePartition { sizes, infinite_last: true })
    }

    /// `0_[n]`: every point its own block.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::from_sizes(vec![1; n.max(0)])
    }

    /// `1_[n]`: one block.
    pub fn single_block(n: u64) -> Result<Self> {
        Self::from_sizes(vec![n])
    }

    /// Number of blocks, the infinite one included.
    pub fn num_blocks(&self) -> usize {
        self.sizes.len() + usize::from(self.infinite_last)
    }

    /// `None` when the partition covers the whole line.
    pub fn ground_size(&self) -> Option<u64> {
        if self.infinite_last {
            None
        } else {
            Some(self.sizes.iter().sum())
        }
    }

    pub fn has_infinite_block(&self) -> bool {
        self.infinite_last
    }

    /// Finite block sizes in order (excludes the infinite block).
    pub fn finite_sizes(&self) -> &[u64] {
        &self.sizes
    }

    /// Size of block `j` (1-based); `None` for the infinite block.
    pub fn block_size(&self, j: usize) -> Result<Option<u64>> {
        if j == 0 || j > self.num_blocks() {
            return Err(Error::domain(format!("block index {j} out of range 1..={}", self.num_blocks())));
        }
        Ok(self.sizes.get(j - 1).copied())
    }
}

/// `coag(C, D)`: groups consecutive runs of `C`-blocks according to `D`.
/// Needs `C.num_blocks() <= D.ground_size()`; trailing `D`-blocks that index
/// past the end of `C` are empty and dropped, so the result has positive
/// blocks and the same ground as `C`.
pub fn coag(c: &ConsecutivePartition, d: &ConsecutivePartition) -> Result<ConsecutivePartition> {
    let m = c.num_blocks() as u64;
    if let Some(g) = d.ground_size() {
        if m > g {
            return Err(Error::domain(format!(
                "coag needs #blocks(C) <= ground(D): {m} > {g}"
            )));
        }
    }
    let f = c.sizes.len(); // finite block count of C
    let mut out = Vec::new();
    let mut idx = 0usize; // next C-block index, 0-based
    let mut out_inf = false;
    for &k in &d.sizes {
        if idx >= c.num_blocks() {
            break;
        }
        let hi = idx + k as usize;
        if c.infinite_last && hi > f {
            // Group swallows C's infinite block.
            out_inf = true;
            idx = c.num_blocks();
            break;
        }
        let hi = hi.min(f);
        let s: u64 = c.sizes[idx..hi].iter().sum();
        if s > 0 {
            out.push(s);
        }
        idx = hi;
    }
    if d.infinite_last && idx < c.num_blocks() {
        // D's infinite block groups everything that remains into one block.
        if c.infinite_last {
            out_inf = true;
        } else {
            out.push(c.sizes[idx..].iter().sum());
        }
        idx = c.num_blocks();
    }
    if idx < c.num_blocks() {
        return Err(Error::domain("coag left C-blocks ungrouped (D exhausted)".to_string()));
    }
    if out_inf {
        ConsecutivePartition::from_sizes_with_infinite(out)
    } else {
        ConsecutivePartition::from_sizes(out)
    }
}

/// Restriction to `[k]`: truncates the block overlapping `k`.
pub fn restrict(c: &ConsecutivePartition, k: u64) -> Result<ConsecutivePartition> {
    if k == 0 {
        return Err(Error::domain("restriction needs k >= 1".to_string()));
    }
    if let Some(g) = c.ground_size() {
        if k > g {
            return Err(Error::domain(format!("restriction to [{k}] exceeds ground [{g}]")));
        }
    }
    let mut out = Vec::new();
    let mut acc = 0u64;
    for &s in &c.sizes {
        if acc + s >= k {
            out.push(k - acc);
            return ConsecutivePartition::from_sizes(out);
        }
        out.push(s);
        acc += s;
    }
    // Remaining mass lies in the infinite block.
    out.push(k - acc);
    ConsecutivePartition::from_sizes(out)
}

/// Metric `d(C, D) = 1 / sup{n >= 1 : C|[n] = D|[n]}`, zero when equal.
///
/// Restrictions to `[n]` agree exactly when the two sets of block boundaries
/// coincide below `n`, so the sup is the smallest boundary belonging to one
/// partition only. Restrictions to `[1]` always agree, hence the value is at
/// most 1, attained when the first block sizes differ. Partitions with equal
/// boundaries but different ground (one finite, one not) get
/// `1/(ground + 1)`: they agree on every comparable restriction.
pub fn distance(c: &ConsecutivePartition, d: &ConsecutivePartition) -> f64 {
    if c == d {
        return 0.0;
    }
    let mut ca = 0u64;
    let mut da = 0u64;
    let mut ci = c.sizes.iter();
    let mut di = d.sizes.iter();
    let mut cb = ci.next().map(|&s| s);
    let mut db = di.next().map(|&s| s);
    loop {
        match (cb, db) {
            (Some(x), Some(y)) => {
                if ca + x == da + y {
                    ca += x;
                    da += y;
                    cb = ci.next().map(|&s| s);
                    db = di.next().map(|&s| s);
                } else {
                    return 1.0 / (ca + x).min(da + y) as f64;
                }
            }
            (Some(x), Option::None) => {
                // D has no further boundary below ca + x.
                return if d.infinite_last {
                    1.0 / (ca + x) as f64
                } else {
                    1.0 / (da + 1) as f64
                };
            }
            (Option::None, Some(y)) => {
                return if c.infinite_last {
                    1.0 / (da + y) as f64
                } else {
                    1.0 / (ca + 1) as f64
                };
            }
            (Option::None, Option::None) => {
                // Same boundaries; partitions differ only through ground.
                let g = ca.min(da);
                return 1.0 / (g + 1) as f64;
            }
        }
    }
}

/// Applies one merge event in place on the size sequence. Equivalent to
/// `coag` with the two-row partition the event encodes.
pub fn apply_merge(c: &ConsecutivePartition, e: MergeEvent) -> Result<ConsecutivePartition> {
    let m = c.num_blocks();
    let f = c.sizes.len();
    if e.j == 0 {
        return Err(Error::domain("merge index j is 1-based".to_string()));
    }
    if e.boundary {
        if e.j + 1 > m {
            return Err(Error::domain(format!("boundary merge at j={} needs j <= m-1 = {}", e.j, m - 1)));
        }
        let mut sizes: Vec<u64> = c.sizes[..(e.j - 1).min(f)].to_vec();
        if c.infinite_last {
            return ConsecutivePartition::from_sizes_with_infinite(sizes);
        }
        sizes.push(c.sizes[e.j - 1..].iter().sum());
        return ConsecutivePartition::from_sizes(sizes);
    }
    if e.k < 2 {
        return Err(Error::domain(format!("interior merge needs k >= 2, got {}", e.k)));
    }
    if e.j + e.k - 1 > m {
        return Err(Error::domain(format!(
            "interior merge (j={}, k={}) exceeds block count {m}",
            e.j, e.k
        )));
    }
    if c.infinite_last && e.j + e.k - 1 == m {
        // Merged group ends at the infinite block.
        let sizes = c.sizes[..e.j - 1].to_vec();
        return ConsecutivePartition::from_sizes_with_infinite(sizes);
    }
    let mut sizes: Vec<u64> = c.sizes[..e.j - 1].to_vec();
    sizes.push(c.sizes[e.j - 1..e.j + e.k - 1].iter().sum());
    sizes.extend_from_slice(&c.sizes[e.j + e.k - 1..]);
    if c.infinite_last {
        ConsecutivePartition::from_sizes_with_infinite(sizes)
    } else {
        ConsecutivePartition::from_sizes(sizes)
    }
}

impl fmt::Display for ConsecutivePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, s) in self.sizes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        if self.infinite_last {
            if !self.sizes.is_empty() {
                write!(f, ",")?;
            }
            write!(f, "inf")?;
        }
        write!(f, "]")
    }
}

impl FromStr for ConsecutivePartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = s
            .trim()
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| Error::config(format!("partition text must be bracketed: {s:?}")))?;
        let mut sizes = Vec::new();
        let mut infinite = false;
        for (i, tok) in body.split(',').enumerate() {
            let tok = tok.trim();
            if tok.is_empty() && i == 0 && body.trim().is_empty() {
                break;
            }
            if infinite {
                return Err(Error::config("infinite block must be last".to_string()));
            }
            if tok == "inf" {
                infinite = true;
                continue;
            }
            let v: u64 = tok
                .parse()
                .map_err(|_| Error::config(format!("bad block size {tok:?} in {s:?}")))?;
            sizes.push(v);
        }
        if infinite {
            ConsecutivePartition::from_sizes_with_infinite(sizes)
        } else {
            ConsecutivePartition::from_sizes(sizes)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(sizes: &[u64]) -> ConsecutivePartition {
        ConsecutivePartition::from_sizes(sizes.to_vec()).unwrap()
    }

    fn p_inf(sizes: &[u64]) -> ConsecutivePartition {
        ConsecutivePartition::from_sizes_with_infinite(sizes.to_vec()).unwrap()
    }

    #[test]
    fn coag_with_singletons_is_identity() {
        let c = p(&[2, 1, 3]);
        let id = ConsecutivePartition::singletons(3).unwrap();
        assert_eq!(coag(&c, &id).unwrap(), c);
    }

    #[test]
    fn coag_with_single_block_collapses() {
        let c = p(&[2, 1, 3]);
        let one = ConsecutivePartition::single_block(3).unwrap();
        assert_eq!(coag(&c, &one).unwrap(), p(&[6]));
    }

    #[test]
    fn coag_hand_example() {
        // D = {1,2},{3} groups the first two blocks.
        assert_eq!(coag(&p(&[2, 1, 3]), &p(&[2, 1])).unwrap(), p(&[3, 3]));
    }

    #[test]
    fn coag_drops_empty_groups() {
        // D covers [5] but C has 3 blocks; trailing groups are empty.
        let c = p(&[2, 1, 3]);
        let d = p(&[2, 1, 1, 1]);
        assert_eq!(coag(&c, &d).unwrap(), p(&[3, 3]));
    }

    #[test]
    fn coag_precondition() {
        assert!(coag(&p(&[1, 1, 1]), &p(&[2])).is_err());
    }

    #[test]
    fn coag_infinite_ground_passthrough() {
        // C partitions the line; D's infinite block groups the tail.
        let c = p_inf(&[2, 1]);
        let d = p_inf(&[1]);
        let got = coag(&c, &d).unwrap();
        assert_eq!(got, p_inf(&[2]));

        let d2 = p_inf(&[2]);
        assert_eq!(coag(&c, &d2).unwrap(), p_inf(&[3]));
    }

    #[test]
    fn coag_associativity_samples() {
        let triples = [
            ([2u64, 1, 3].as_slice(), [2u64, 1].as_slice(), [1u64, 1].as_slice()),
            (&[1, 1, 1, 1, 1], &[2, 3], &[2]),
            (&[3, 2, 2, 1], &[1, 2, 1], &[2, 1]),
        ];
        for (a, b, c) in triples {
            let (a, b, c) = (p(a), p(b), p(c));
            let lhs = coag(&coag(&a, &b).unwrap(), &c).unwrap();
            let rhs = coag(&a, &coag(&b, &c).unwrap()).unwrap();
            assert_eq!(lhs, rhs, "a={a} b={b} c={c}");
        }
    }

    #[test]
    fn restrict_truncates_last_block() {
        assert_eq!(restrict(&p(&[2, 1, 3]), 4).unwrap(), p(&[2, 1, 1]));
        assert_eq!(restrict(&p(&[2, 1, 3]), 6).unwrap(), p(&[2, 1, 3]));
        assert_eq!(restrict(&p(&[5]), 2).unwrap(), p(&[2]));
        assert_eq!(restrict(&p_inf(&[2]), 7).unwrap(), p(&[2, 5]));
    }

    #[test]
    fn restrict_is_projective() {
        let c = p(&[3, 2, 4, 1]);
        for k in 1..=10u64 {
            for m in 1..=k {
                let once = restrict(&c, m).unwrap();
                let twice = restrict(&restrict(&c, k).unwrap(), m).unwrap();
                assert_eq!(once, twice, "k={k} m={m}");
            }
        }
    }

    #[test]
    fn restrict_commutes_with_coag() {
        let c = p(&[2, 1, 3, 2]);
        let d = p(&[2, 2]);
        let full = coag(&c, &d).unwrap();
        for n in 1..=8u64 {
            let lhs = restrict(&full, n).unwrap();
            let rhs = coag(&restrict(&c, n).unwrap(), &d);
            // The restricted C can have fewer blocks than D indexes, which is
            // exactly the dropped-empty-group case.
            assert_eq!(lhs, rhs.unwrap(), "n={n}");
        }
    }

    #[test]
    fn distance_zero_iff_equal() {
        let c = p(&[2, 1, 3]);
        assert_eq!(distance(&c, &c.clone()), 0.0);
        assert_eq!(distance(&p_inf(&[2, 1]), &p_inf(&[2, 1])), 0.0);
    }

    #[test]
    fn distance_first_point_disagreement_is_one() {
        // Restrictions to [1] agree for any pair; these differ on [2].
        assert_eq!(distance(&p_inf(&[1, 1, 1]), &p_inf(&[2, 1])), 1.0);
        assert_eq!(distance(&p(&[1, 1, 1, 1]), &p(&[2, 1, 1])), 1.0);
    }

    #[test]
    fn distance_through_truncated_boundary() {
        // [2,2,..] vs [2,1,1,..]: restrictions to [3] are both [2,1] because
        // truncation cuts the second block, so agreement holds through n = 3.
        assert_eq!(distance(&p_inf(&[2, 2]), &p_inf(&[2, 1, 1])), 1.0 / 3.0);
        assert_eq!(distance(&p(&[2, 2, 2]), &p(&[2, 1, 1, 1, 1])), 1.0 / 3.0);
    }

    #[test]
    fn distance_matches_brute_force_over_restrictions() {
        let pairs = [
            (p(&[2, 2, 2, 2]), p(&[2, 1, 1, 1, 1, 1, 1])),
            (p(&[3, 3, 2]), p(&[3, 2, 3])),
            (p(&[1, 2, 3, 2]), p(&[1, 2, 3, 1, 1])),
            (p(&[4, 4]), p(&[4, 3, 1])),
        ];
        for (c, d) in pairs {
            let n = c.ground_size().unwrap().min(d.ground_size().unwrap());
            let mut sup = 1u64;
            for k in 1..=n {
                if restrict(&c, k).unwrap() == restrict(&d, k).unwrap() {
                    sup = k;
                } else {
                    break;
                }
            }
            let brute = if c == d { 0.0 } else { 1.0 / sup as f64 };
            assert_eq!(distance(&c, &d), brute, "c={c} d={d}");
        }
    }

    #[test]
    fn apply_merge_interior_and_boundary() {
        let c = p(&[1, 1, 1, 1]);
        assert_eq!(apply_merge(&c, MergeEvent { j: 2, k: 2, boundary: false }).unwrap(), p(&[1, 2, 1]));
        assert_eq!(apply_merge(&c, MergeEvent { j: 2, k: 0, boundary: true }).unwrap(), p(&[1, 3]));
    }

    #[test]
    fn apply_merge_rejects_out_of_range() {
        let c = p(&[1, 1, 1]);
        assert!(apply_merge(&c, MergeEvent { j: 2, k: 3, boundary: false }).is_err());
        assert!(apply_merge(&c, MergeEvent { j: 3, k: 0, boundary: true }).is_err());
        assert!(apply_merge(&c, MergeEvent { j: 0, k: 2, boundary: false }).is_err());
    }

    #[test]
    fn apply_merge_infinite_tail() {
        let c = p_inf(&[1, 1, 1]);
        // Interior merge reaching the infinite block absorbs into it.
        assert_eq!(
            apply_merge(&c, MergeEvent { j: 3, k: 2, boundary: false }).unwrap(),
            p_inf(&[1, 1])
        );
        assert_eq!(apply_merge(&c, MergeEvent { j: 2, k: 0, boundary: true }).unwrap(), p_inf(&[1]));
    }

    #[test]
    fn apply_merge_equals_coag_exhaustively() {
        // Every event on a handful of shapes with up to 6 blocks, against the
        // coag route with the two-row partition the event encodes.
        let shapes: Vec<Vec<u64>> = vec![
            vec![1, 1],
            vec![2, 1, 3],
            vec![1, 1, 1, 1],
            vec![3, 1, 2, 1, 1],
            vec![1, 2, 1, 2, 1, 2],
        ];
        for sizes in shapes {
            let c = p(&sizes);
            let m = c.num_blocks();
            for j in 1..=m {
                for k in 2..=m {
                    if j + k - 1 > m {
                        continue;
                    }
                    let e = MergeEvent { j, k, boundary: false };
                    let mut d = vec![1u64; j - 1];
                    d.push(k as u64);
                    d.extend(vec![1u64; m - (j + k - 1)]);
                    let via_coag = coag(&c, &p(&d)).unwrap();
                    assert_eq!(apply_merge(&c, e).unwrap(), via_coag, "c={c} e={e:?}");
                }
                if j < m {
                    let e = MergeEvent { j, k: m - j + 1, boundary: true };
                    let mut d = vec![1u64; j - 1];
                    d.push((m - j + 1) as u64);
                    let via_coag = coag(&c, &p(&d)).unwrap();
                    assert_eq!(apply_merge(&c, e).unwrap(), via_coag, "c={c} e={e:?}");
                }
            }
        }
    }

    #[test]
    fn render_and_parse_roundtrip() {
        for c in [p(&[2, 1, 3]), p(&[7]), p_inf(&[2, 1]), p_inf(&[])] {
            let text = c.to_string();
            let back: ConsecutivePartition = text.parse().unwrap();
            assert_eq!(back, c, "text {text}");
        }
        assert_eq!(p(&[2, 1, 3]).to_string(), "[2,1,3]");
        assert_eq!(p_inf(&[2]).to_string(), "[2,inf]");
        assert!("2,1".parse::<ConsecutivePartition>().is_err());
        assert!("[2,inf,1]".parse::<ConsecutivePartition>().is_err());
        assert!("[0]".parse::<ConsecutivePartition>().is_err());
    }

    #[test]
    fn lipschitz_under_right_coagulation() {
        let pairs = [
            (p(&[2, 2, 2, 2]), p(&[2, 1, 1, 1, 1, 1, 1])),
            (p(&[1, 1, 1, 1, 1, 1]), p(&[2, 1, 1, 1, 1])),
        ];
        let d_right = p_inf(&[2, 1, 1]);
        for (a, b) in pairs {
            let base = distance(&a, &b);
            let ca = coag(&a, &d_right).unwrap();
            let cb = coag(&b, &d_right).unwrap();
            assert!(distance(&ca, &cb) <= base + 1e-15, "a={a} b={b}");
        }
    }
}
