//! Partition encodings, frequency spectra and the variation-of-information point estimate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Cluster labels per item. Label 0 marks a contaminant, which forms its own
/// singleton block; positive labels are renumbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    pub fn new(labels: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let mut out = Vec::with_capacity(labels.len());
        for &l in labels {
            if l == 0 {
                out.push(0);
                continue;
            }
            let id = match map.iter().find(|(from, _)| *from == l) {
                Some((_, to)) => *to,
                None => {
                    map.push((l, map.len() + 1));
                    map.len()
                }
            };
            out.push(id);
        }
        Self { labels: out }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Block index per item with every contaminant in its own block, numbered 0..k.
    pub fn block_ids(&self) -> Vec<usize> {
        let positive = self.labels.iter().copied().max().unwrap_or(0);
        let mut next = positive;
        self.labels
            .iter()
            .map(|&l| {
                if l == 0 {
                    next += 1;
                    next - 1
                } else {
                    l - 1
                }
            })
            .collect()
    }

    /// Number of blocks, counting each contaminant as one.
    pub fn num_blocks(&self) -> usize {
        let positive = self.labels.iter().copied().max().unwrap_or(0);
        positive + self.labels.iter().filter(|&&l| l == 0).count()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_blocks()];
        for b in self.block_ids() {
            sizes[b] += 1;
        }
        sizes
    }
}

/// m_r, the number of blocks of size r, stored at index r − 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencySpectrum {
    pub counts: Vec<usize>,
}

impl FrequencySpectrum {
    pub fn get(&self, r: usize) -> usize {
        if r == 0 {
            return 0;
        }
        self.counts.get(r - 1).copied().unwrap_or(0)
    }

    pub fn n(&self) -> usize {
        self.counts.iter().enumerate().map(|(i, m)| (i + 1) * m).sum()
    }

    pub fn k(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn frequency_spectrum(p: &Partition) -> FrequencySpectrum {
    let mut counts = vec![0; p.len()];
    for s in p.block_sizes() {
        counts[s - 1] += 1;
    }
    FrequencySpectrum { counts }
}

/// Number of blocks of size one, contaminants included.
pub fn count_singletons(p: &Partition) -> usize {
    p.block_sizes().iter().filter(|&&s| s == 1).count()
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let q = c as f64 / n;
            -q * q.ln()
        })
        .sum()
}

struct Encoded {
    ids: Vec<usize>,
    k: usize,
    entropy: f64,
}

fn encode(p: &Partition) -> Encoded {
    let n = p.len() as f64;
    let mut sizes = p.block_sizes();
    // Same summation order as the joint entropy, so that VI(a, a) is exactly 0.
    sizes.sort_unstable();
    Encoded { ids: p.block_ids(), k: sizes.len(), entropy: entropy_of_counts(sizes.into_iter(), n) }
}

fn vi_encoded(a: &Encoded, b: &Encoded, scratch: &mut Vec<usize>) -> f64 {
    let n = a.ids.len();
    scratch.clear();
    scratch.extend(a.ids.iter().zip(&b.ids).map(|(x, y)| x * b.k.max(1) + y));
    scratch.sort_unstable();
    let mut runs = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scratch[j] == scratch[i] {
            j += 1;
        }
        runs.push(j - i);
        i = j;
    }
    // Sorted run lengths make the result exactly symmetric in (a, b).
    runs.sort_unstable();
    let joint = entropy_of_counts(runs.into_iter(), n as f64);
    (2.0 * joint - (a.entropy + b.entropy)).max(0.0)
}

/// Variation of information in nats.
pub fn vi_distance(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(vi_encoded(&encode(a), &encode(b), &mut Vec::new()))
}

/// The sampled partition with the smallest average VI to all samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub partition: Partition,
    /// Index of its first occurrence among the samples.
    pub index: usize,
    pub expected_vi: f64,
}

/// Minimizes the posterior expected VI over the sampled partitions.
/// Ties go to the partition that occurs first.
pub fn vi_point_estimate(samples: &[Partition]) -> Result<PointEstimate> {
    if samples.is_empty() {
        return Err(Error::Empty("point estimation needs at least one partition"));
    }
    let n = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
    }
    let mut unique: Vec<(usize, usize)> = Vec::new();
    let mut index: std::collections::HashMap<&Partition, usize> = std::collections::HashMap::new();
    for (i, s) in samples.iter().enumerate() {
        match index.get(s) {
            Some(&u) => unique[u].1 += 1,
            None => {
                index.insert(s, unique.len());
                unique.push((i, 1));
            }
        }
    }
    let enc: Vec<Encoded> = unique.iter().map(|(i, _)| encode(&samples[*i])).collect();
    let total = samples.len() as f64;
    let mut scratch = Vec::with_capacity(n);
    let mut best: Option<(usize, f64)> = None;
    for (u, eu) in enc.iter().enumerate() {
        let mut acc = 0.0;
        for (v, ev) in enc.iter().enumerate() {
            if u != v {
                acc += unique[v].1 as f64 * vi_encoded(eu, ev, &mut scratch);
            }
        }
        let score = acc / total;
        if best.is_none_or(|(_, b)| score < b) {
            best = Some((u, score));
        }
    }
    let (u, expected_vi) = best.expect("at least one sample");
    let first = unique[u].0;
    Ok(PointEstimate { partition: samples[first].clone(), index: first, expected_vi })
}

/// All set partitions of {0..n} as restricted growth strings (labels from 1).
pub fn set_partitions(n: usize) -> Result<Vec<Vec<usize>>> {
    if n > 10 {
        return invalid(format!("set-partition enumeration is capped at n = 10, got {n}"));
    }
    if n == 0 {
        return Ok(vec![Vec::new()]);
    }
    let mut out = Vec::new();
    let mut a = vec![1usize; n];
    let mut max = vec![1usize; n];
    loop {
        out.push(a.clone());
        // Find the rightmost position that can be incremented.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            if a[i] <= max[i - 1] {
                break;
            }
            i -= 1;
        }
        a[i] += 1;
        max[i] = max[i - 1].max(a[i]);
        for j in (i + 1)..n {
            a[j] = 1;
            max[j] = max[i];
        }
    }
}
