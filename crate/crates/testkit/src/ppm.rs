//! Interpolated PPM with escape method C, computed from raw substring counts.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Shortest deterministic context, else the longest matched one.
    Star,
    /// Longest matched context up to the bound.
    Fixed(usize),
}

/// Occurrences of `w` as a contiguous run inside any one sequence.
pub fn occurrences(sequences: &[Vec<u32>], w: &[u32]) -> u64 {
    sequences
        .iter()
        .map(|s| if w.len() > s.len() { 0 } else { (0..=s.len() - w.len()).filter(|&i| &s[i..i + w.len()] == w).count() as u64 })
        .sum()
}

/// How often `x` directly followed `context`.
pub fn continuation(sequences: &[Vec<u32>], context: &[u32], x: u32) -> u64 {
    let mut w = context.to_vec();
    w.push(x);
    occurrences(sequences, &w)
}

struct Model<'a> {
    sequences: &'a [Vec<u32>],
    context: &'a [u32],
    alphabet: u32,
}

impl Model<'_> {
    fn suffix(&self, k: usize) -> &[u32] {
        &self.context[self.context.len() - k..]
    }

    fn c(&self, k: usize, x: u32) -> u64 {
        continuation(self.sequences, self.suffix(k), x)
    }

    fn n(&self, k: usize) -> u64 {
        (0..self.alphabet).map(|x| self.c(k, x)).sum()
    }

    fn t(&self, k: usize) -> u64 {
        (0..self.alphabet).filter(|&x| self.c(k, x) > 0).count() as u64
    }

    /// p_k(x): order -1 is uniform; an order with no data passes through.
    fn p(&self, k: isize, x: u32) -> f64 {
        if k < 0 {
            return 1.0 / self.alphabet as f64;
        }
        let k_u = k as usize;
        let (n, t) = (self.n(k_u), self.t(k_u));
        if n == 0 {
            return self.p(k - 1, x);
        }
        (self.c(k_u, x) as f64 + t as f64 * self.p(k - 1, x)) / (n + t) as f64
    }
}

/// Next-symbol distribution after `context` given training `sequences`.
/// `max_depth` caps the context length considered.
pub fn distribution(sequences: &[Vec<u32>], context: &[u32], alphabet: u32, order: Order, max_depth: Option<usize>) -> Vec<f64> {
    let m = Model { sequences, context, alphabet };
    let cap = max_depth.map_or(context.len(), |d| d.min(context.len()));
    // orders whose context string occurred at all
    let matched: Vec<usize> = (0..=cap).take_while(|&k| k == 0 || occurrences(sequences, m.suffix(k)) > 0).collect();
    let with_data: Vec<usize> = matched.iter().copied().filter(|&k| m.n(k) > 0).collect();
    let Some(&longest) = with_data.last() else {
        return vec![1.0 / alphabet as f64; alphabet as usize];
    };
    let start = match order {
        Order::Star => matched.iter().copied().filter(|&k| k <= longest).find(|&k| m.t(k) == 1).unwrap_or(longest),
        Order::Fixed(b) => with_data.iter().copied().filter(|&k| k <= b).last().unwrap_or(0),
    };
    (0..alphabet).map(|x| m.p(start as isize, x)).collect()
}

/// Shannon entropy in bits.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>()
}

/// Weighted geometric mean with weights `(H / log2 V)^-b`, evaluated with
/// plain powers and products.
pub fn geometric(dists: &[Vec<f64>], bias: f64) -> Vec<f64> {
    let v = dists[0].len();
    let max = (v as f64).log2();
    let w: Vec<f64> = dists
        .iter()
        .map(|d| if max == 0.0 { 1.0 } else { (entropy(d) / max).max(1e-12).powf(-bias) })
        .collect();
    let total: f64 = w.iter().sum();
    let raw: Vec<f64> = (0..v).map(|i| dists.iter().zip(&w).map(|(d, wi)| d[i].powf(wi / total)).product()).collect();
    let z: f64 = raw.iter().sum();
    raw.iter().map(|r| r / z).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Online {
    Ltm,
    LtmPlus,
    Stm,
    BothPlus,
}

/// Probability of each test token when every earlier test token is treated
/// as one more (separate) training sequence for the online models.
pub fn online(train: &[Vec<u32>], test: &[u32], alphabet: u32, order: Order, max_depth: Option<usize>, mode: Online, bias: f64) -> Vec<f64> {
    (0..test.len())
        .map(|i| {
            let prefix = &test[..i];
            let mut plus = train.to_vec();
            plus.push(prefix.to_vec());
            let stm = vec![prefix.to_vec()];
            let x = test[i] as usize;
            match mode {
                Online::Ltm => distribution(train, prefix, alphabet, order, max_depth)[x],
                Online::LtmPlus => distribution(&plus, prefix, alphabet, order, max_depth)[x],
                Online::Stm => distribution(&stm, prefix, alphabet, order, max_depth)[x],
                Online::BothPlus => {
                    let a = distribution(&plus, prefix, alphabet, order, max_depth);
                    let b = distribution(&stm, prefix, alphabet, order, max_depth);
                    geometric(&[a, b], bias)[x]
                }
            }
        })
        .collect()
}
