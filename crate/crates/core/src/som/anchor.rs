use super::{Result, SomError};
use crate::panoptic::BinaryMask;

const INF: i64 = i64::MAX / 4;

/// One-dimensional squared distance transform (lower envelope of parabolas).
fn edt_1d(f: &[i64], out: &mut [i64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    let mut k = 0usize;
    // Skip leading infinite samples; at least one finite sample exists per padded line.
    let first = f.iter().position(|&x| x < INF).expect("finite sample");
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if f[q] >= INF {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as i64) - (f[p] + (p * p) as i64)) as f64
                / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as i64 - v[k] as i64;
        *o = d * d + f[v[k]];
    }
}

/// Exact squared Euclidean distance from each pixel to the nearest non-mask pixel, where
/// everything outside the frame counts as non-mask. Row-major, zero off the mask.
pub fn distance_to_complement(mask: &BinaryMask) -> Vec<i64> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let (pw, ph) = (w + 2, h + 2);
    let mut g = vec![0i64; pw * ph];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x as u32, y as u32) {
                g[(y + 1) * pw + x + 1] = INF;
            }
        }
    }
    let mut col = vec![0i64; ph];
    let mut tmp = vec![0i64; ph];
    for x in 0..pw {
        for y in 0..ph {
            col[y] = g[y * pw + x];
        }
        edt_1d(&col, &mut tmp);
        for y in 0..ph {
            g[y * pw + x] = tmp[y];
        }
    }
    let mut row = vec![0i64; pw];
    let mut out = vec![0i64; w * h];
    for y in 1..=h {
        row.copy_from_slice(&g[y * pw..(y + 1) * pw]);
        let mut t = vec![0i64; pw];
        edt_1d(&row, &mut t);
        out[(y - 1) * w..y * w].copy_from_slice(&t[1..=w]);
    }
    out
}

/// The mask pixel farthest from the complement. Ties go to the pixel nearest the centroid of
/// the tied set, then lowest row, then lowest column.
pub fn anchor_point(mask: &BinaryMask) -> Result<[u32; 2]> {
    if mask.is_empty() {
        return Err(SomError::EmptyMask);
    }
    let w = mask.width() as usize;
    let dist = distance_to_complement(mask);
    let best = *dist.iter().max().expect("non-empty");
    let tied: Vec<(i64, i64)> = dist
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == best)
        .map(|(i, _)| ((i % w) as i64, (i / w) as i64))
        .collect();
    let n = tied.len() as i64;
    let (sx, sy) = tied.iter().fold((0, 0), |a, p| (a.0 + p.0, a.1 + p.1));
    // Compare n²·|p - c|² to stay in integers.
    let key = |p: &(i64, i64)| {
        let (dx, dy) = (n * p.0 - sx, n * p.1 - sy);
        (dx * dx + dy * dy, p.1, p.0)
    };
    let p = tied.iter().min_by_key(|p| key(p)).expect("non-empty");
    Ok([p.0 as u32, p.1 as u32])
}
