//! Per-symbol probability mass functions over a constellation.

/// A sequence of pmfs, `q` probabilities per symbol, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPmfs {
    q: usize,
    probs: Vec<f64>,
}

impl SymbolPmfs {
    pub fn uniform(len: usize, q: usize) -> Self {
        SymbolPmfs {
            q,
            probs: vec![1.0 / q as f64; len * q],
        }
    }

    /// Wraps flat probabilities; each pmf is renormalised.
    pub fn from_flat(q: usize, probs: Vec<f64>) -> Self {
        assert!(q > 0 && probs.len().is_multiple_of(q), "flat pmf length must be a multiple of q");
        let mut s = SymbolPmfs { q, probs };
        for i in 0..s.len() {
            normalize(s.get_mut(i));
        }
        s
    }

    /// Point masses on the given labels.
    pub fn deltas(labels: &[usize], q: usize) -> Self {
        let mut probs = vec![0.0; labels.len() * q];
        for (i, &a) in labels.iter().enumerate() {
            probs[i * q + a] = 1.0;
        }
        SymbolPmfs { q, probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len() / self.q
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.probs[i * self.q..(i + 1) * self.q]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.probs[i * self.q..(i + 1) * self.q]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.q)
    }

    /// Most probable label per symbol (lowest label on ties).
    pub fn hard_decisions(&self) -> Vec<usize> {
        self.iter()
            .map(|p| {
                let mut best = 0;
                for (a, &v) in p.iter().enumerate() {
                    if v > p[best] {
                        best = a;
                    }
                }
                best
            })
            .collect()
    }

    /// Gathers the pmfs at `idx` into a new set.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut probs = Vec::with_capacity(idx.len() * self.q);
        for &i in idx {
            probs.extend_from_slice(self.get(i));
        }
        SymbolPmfs { q: self.q, probs }
    }

    /// Writes `src[j]` into position `idx[j]`.
    pub fn scatter(&mut self, idx: &[usize], src: &SymbolPmfs) {
        for (j, &i) in idx.iter().enumerate() {
            self.get_mut(i).copy_from_slice(src.get(j));
        }
    }

    /// Mean total-variation distance to another set.
    pub fn mean_tv(&self, other: &SymbolPmfs) -> f64 {
        assert_eq!(self.probs.len(), other.probs.len());
        let tv: f64 = self
            .iter()
            .zip(other.iter())
            .map(|(a, b)| 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .sum();
        tv / self.len().max(1) as f64
    }
}

/// Scales to unit sum; an all-zero or non-finite input becomes uniform.
pub fn normalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    if s > 0.0 && s.is_finite() {
        p.iter_mut().for_each(|v| *v /= s);
    } else {
        let u = 1.0 / p.len() as f64;
        p.iter_mut().for_each(|v| *v = u);
    }
}

/// Turns log-weights into a normalised pmf in place.
pub fn softmax_in_place(logw: &mut [f64]) {
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let u = 1.0 / logw.len() as f64;
        logw.iter_mut().for_each(|v| *v = u);
        return;
    }
    logw.iter_mut().for_each(|v| *v = (*v - max).exp());
    normalize(logw);
}
