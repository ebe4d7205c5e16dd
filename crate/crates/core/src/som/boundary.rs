use super::{Result, SomError};
use crate::panoptic::BinaryMask;

/// A closed loop of pixel coordinates `[x, y]`; the last vertex connects back to the first.
/// Consecutive vertices are joined by horizontal, vertical or diagonal pixel runs.
pub type Polyline = Vec<[u32; 2]>;

// Clockwise from east in image coordinates (y down): E, SE, S, SW, W, NW, N, NE.
const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn dir_of(from: (i64, i64), to: (i64, i64)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    DIRS.iter().position(|&x| x == d).expect("8-neighbour")
}

/// Border following over the 8-connected foreground: one loop per component's outer border
/// and one per hole, in raster order of their starting pixels.
pub fn trace_boundary(mask: &BinaryMask) -> Result<Vec<Polyline>> {
    if mask.is_empty() {
        return Err(SomError::EmptyMask);
    }
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    // Padded label raster: 0 background, 1 unvisited foreground, ±k border labels.
    let (pw, ph) = (w + 2, h + 2);
    let mut f = vec![0i32; (pw * ph) as usize];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x as u32, y as u32) {
                f[((y + 1) * pw + x + 1) as usize] = 1;
            }
        }
    }
    let at = |f: &[i32], p: (i64, i64)| f[(p.1 * pw + p.0) as usize];
    let mut nbd = 1;
    let mut loops = Vec::new();
    for y in 1..ph - 1 {
        for x in 1..pw - 1 {
            let v = at(&f, (x, y));
            let from = if v == 1 && at(&f, (x - 1, y)) == 0 {
                (x - 1, y)
            } else if v >= 1 && at(&f, (x + 1, y)) == 0 {
                (x + 1, y)
            } else {
                continue;
            };
            nbd += 1;
            loops.push(follow(&mut f, pw, (x, y), from, nbd));
        }
    }
    Ok(loops
        .into_iter()
        .map(|l| {
            simplify(
                l.into_iter()
                    .map(|(x, y)| [(x - 1) as u32, (y - 1) as u32])
                    .collect(),
            )
        })
        .collect())
}

fn follow(
    f: &mut [i32],
    pw: i64,
    start: (i64, i64),
    from: (i64, i64),
    nbd: i32,
) -> Vec<(i64, i64)> {
    let idx = |p: (i64, i64)| (p.1 * pw + p.0) as usize;
    let start_dir = dir_of(start, from);
    // Clockwise search for the first foreground neighbour.
    let first = (0..8)
        .map(|k| (start_dir + k) % 8)
        .map(|d| (start.0 + DIRS[d].0, start.1 + DIRS[d].1))
        .find(|&p| f[idx(p)] != 0);
    let Some(p1) = first else {
        f[idx(start)] = -nbd;
        return vec![start];
    };
    let mut path = Vec::new();
    let (mut p2, mut p3) = (p1, start);
    loop {
        path.push(p3);
        // Counter-clockwise around p3, starting just after p2.
        let d2 = dir_of(p3, p2);
        let mut east_zero = false;
        let mut p4 = p3;
        for k in 1..=8 {
            let d = (d2 + 8 - k) % 8;
            let q = (p3.0 + DIRS[d].0, p3.1 + DIRS[d].1);
            if f[idx(q)] != 0 {
                p4 = q;
                break;
            }
            if d == 0 {
                east_zero = true;
            }
        }
        if east_zero {
            f[idx(p3)] = -nbd;
        } else if f[idx(p3)] == 1 {
            f[idx(p3)] = nbd;
        }
        if p4 == start && p3 == p1 {
            break;
        }
        p2 = p3;
        p3 = p4;
    }
    path
}

/// Drops vertices that continue the previous step's direction.
fn simplify(path: Vec<[u32; 2]>) -> Polyline {
    let n = path.len();
    if n < 3 {
        return path;
    }
    let step = |a: [u32; 2], b: [u32; 2]| (b[0] as i64 - a[0] as i64, b[1] as i64 - a[1] as i64);
    (0..n)
        .filter(|&i| {
            let (prev, cur, next) = (path[(i + n - 1) % n], path[i], path[(i + 1) % n]);
            step(prev, cur) != step(cur, next)
        })
        .map(|i| path[i])
        .collect()
}

/// Pixels along a closed polyline, consecutive vertices joined by straight runs.
pub fn rasterize(poly: &Polyline) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for (i, &a) in poly.iter().enumerate() {
        let b = poly[(i + 1) % poly.len()];
        let (dx, dy) = (b[0] as i64 - a[0] as i64, b[1] as i64 - a[1] as i64);
        let steps = dx.abs().max(dy.abs());
        for s in 0..steps.max(1) {
            let x = a[0] as i64 + if steps == 0 { 0 } else { dx * s / steps };
            let y = a[1] as i64 + if steps == 0 { 0 } else { dy * s / steps };
            out.push([x as u32, y as u32]);
        }
    }
    out
}
