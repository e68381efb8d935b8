/// Pearson correlation by the two-pass formula: means first, then centred sums.
pub fn pearson(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    let ma = a.iter().sum::<f64>() / 12.0;
    let mb = b.iter().sum::<f64>() / 12.0;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..12 {
        let da = a[i] - ma;
        let db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    sab / (saa * sbb).sqrt()
}

/// Profile moved so that index `tonic` holds the tonic weight.
pub fn rotate(profile: &[f64; 12], tonic: usize) -> [f64; 12] {
    let mut out = [0.0; 12];
    for pc in 0..12 {
        out[pc] = profile[(pc + 12 - tonic) % 12];
    }
    out
}

/// `(tonic, minor, r)` of the best of all 24 keys, scanning tonics upward
/// and major before minor so the first maximum wins.
pub fn best_key(hist: &[f64; 12], major: &[f64; 12], minor: &[f64; 12]) -> (usize, bool, f64) {
    let mut best = (0, false, f64::NEG_INFINITY);
    for tonic in 0..12 {
        for (is_minor, profile) in [(false, major), (true, minor)] {
            let r = pearson(hist, &rotate(profile, tonic));
            if r > best.2 {
                best = (tonic, is_minor, r);
            }
        }
    }
    best
}
