use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::sample::TimeSeriesSample;

/// Alternating blocks of length `a` over `0..n`. Ranges are 0-based, so the
/// first odd block `1..=a` in 1-based time is `0..a` here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub n: usize,
    pub a: usize,
    /// `floor(n / (2a))`
    pub b: usize,
    /// Odd blocks `T_{1,j}`.
    pub t1: Vec<Range<usize>>,
    /// Even blocks `T_{2,j}`.
    pub t2: Vec<Range<usize>>,
    /// Remainder `T_R`, shorter than `2a`.
    pub tr: Range<usize>,
}

pub fn block_partition(n: usize, a: usize) -> Result<BlockPartition> {
    if a == 0 || 2 * a > n {
        return Err(Error::validation(format!("block length must satisfy 1 <= a <= n/2, got a={a}, n={n}")));
    }
    let b = n / (2 * a);
    let t1 = (0..b).map(|j| 2 * j * a..(2 * j + 1) * a).collect();
    let t2 = (0..b).map(|j| (2 * j + 1) * a..(2 * j + 2) * a).collect();
    Ok(BlockPartition { n, a, b, t1, t2, tr: 2 * b * a..n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockNorm {
    /// `‖g‖_{T1,j}` for each odd block.
    pub per_block: Vec<f64>,
    /// `((1/b) Σ_j ‖g‖²_{T1,j})^{1/2}`
    pub aggregate: f64,
    pub per_block_even: Vec<f64>,
    pub aggregate_even: f64,
}

fn block_rms(vals: &[f64], blocks: &[Range<usize>]) -> (Vec<f64>, f64) {
    let per: Vec<f64> =
        blocks.iter().map(|r| (vals[r.clone()].iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()).collect();
    let agg = (per.iter().map(|v| v * v).sum::<f64>() / per.len() as f64).sqrt();
    (per, agg)
}

/// Blockwise RMS of `g(x_t)`.
pub fn block_norm(g: &dyn Fn(&[f64]) -> f64, sample: &TimeSeriesSample, part: &BlockPartition) -> Result<BlockNorm> {
    check_dim(part.n, sample.len())?;
    let vals: Vec<f64> = sample.xs().map(g).collect();
    let (per_block, aggregate) = block_rms(&vals, &part.t1);
    let (per_block_even, aggregate_even) = block_rms(&vals, &part.t2);
    Ok(BlockNorm { per_block, aggregate, per_block_even, aggregate_even })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_based(r: &Range<usize>) -> Vec<usize> {
        r.clone().map(|t| t + 1).collect()
    }

    #[test]
    fn small_examples() {
        let p = block_partition(10, 2).unwrap();
        assert_eq!(p.b, 2);
        assert_eq!(p.t1.iter().map(one_based).collect::<Vec<_>>(), vec![vec![1, 2], vec![5, 6]]);
        assert_eq!(p.t2.iter().map(one_based).collect::<Vec<_>>(), vec![vec![3, 4], vec![7, 8]]);
        assert_eq!(one_based(&p.tr), vec![9, 10]);

        let p = block_partition(4, 2).unwrap();
        assert_eq!((p.b, p.t1.len(), p.t2.len()), (1, 1, 1));
        assert_eq!((p.t1[0].clone(), p.t2[0].clone()), (0..2, 2..4));
        assert!(p.tr.is_empty());

        assert!(block_partition(10, 10).is_err());
        assert!(block_partition(10, 0).is_err());
    }

    #[test]
    fn exhaustive_disjoint_cover() {
        for n in 2..=64 {
            for a in 1..=n / 2 {
                let p = block_partition(n, a).unwrap();
                let mut hits = vec![0u8; n];
                for r in p.t1.iter().chain(&p.t2).chain(std::iter::once(&p.tr)) {
                    for t in r.clone() {
                        hits[t] += 1;
                    }
                }
                assert!(hits.iter().all(|&h| h == 1), "n={n} a={a}");
                assert!(p.t1.iter().chain(&p.t2).all(|r| r.len() == a));
                assert_eq!(p.tr.len(), n - 2 * a * p.b);
                assert!(p.tr.len() < 2 * a);
            }
        }
    }

    #[test]
    fn block_norm_examples() {
        let s = TimeSeriesSample::new(1, vec![0.0; 8], (0..8).map(f64::from).collect()).unwrap();
        let p = block_partition(8, 2).unwrap();
        let c = block_norm(&|_| -1.5, &s, &p).unwrap();
        assert!(c.per_block.iter().all(|&v| v == 1.5));
        assert_eq!(c.aggregate, 1.5);

        let ind = block_norm(&|x| if x[0] < 2.0 { 1.0 } else { 0.0 }, &s, &p).unwrap();
        assert_eq!(ind.per_block, vec![1.0, 0.0]);
        assert!((ind.aggregate - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pooled_blocks_match_restricted_rms() {
        let n = 23;
        let s = TimeSeriesSample::new(1, vec![0.0; n], (0..n).map(|t| (t as f64 * 0.37).sin()).collect()).unwrap();
        let p = block_partition(n, 3).unwrap();
        let g = |x: &[f64]| x[0] * 2.0 - 0.1;
        let bn = block_norm(&g, &s, &p).unwrap();
        let mean_sq = bn.per_block.iter().map(|v| v * v).sum::<f64>() / p.b as f64;
        assert!((bn.aggregate.powi(2) - mean_sq).abs() < 1e-14);
        let pooled = ((bn.aggregate.powi(2) + bn.aggregate_even.powi(2)) / 2.0).sqrt();
        let direct = (0..2 * p.a * p.b).map(|t| g(s.x(t)).powi(2)).sum::<f64>() / (2 * p.a * p.b) as f64;
        assert!((pooled - direct.sqrt()).abs() < 1e-14);
        assert!(block_norm(&g, &s.slice(0..20), &p).is_err());
    }
}
